import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { QuestionRowJson, TableSetJson } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));

export function loadTables(): TableSetJson {
  return JSON.parse(readFileSync(join(here, "fixtures", "tables.json"), "utf-8"));
}

export function loadQuestionRow(): QuestionRowJson {
  return JSON.parse(readFileSync(join(here, "fixtures", "question_row.json"), "utf-8"));
}
