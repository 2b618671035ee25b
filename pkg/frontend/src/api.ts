// Typed client for the promptgrid session service. The UI talks to the
// documented JSON API only; shapes below mirror the service responses.

export interface TableRowJson {
  row_id: string;
  header: string;
  cells: string[];
}

export interface TableJson {
  key: string;
  title: string;
  column_headers: string[];
  rows: TableRowJson[];
}

export interface StyleDefinitionJson {
  category: string;
  choice: string;
  definition_text: string;
}

export interface TableSetJson {
  session_id: string;
  prompt: string;
  image_count: number;
  tables: TableJson[];
  style_definitions: StyleDefinitionJson[];
}

export interface ProgressJson {
  session_id: string;
  status: string;
  rows_completed: number;
  rows_total: number | null;
  error?: string;
}

export interface AnswerCellJson {
  question_id: string;
  image_index: number;
  value: string | string[] | [string, number][];
  provenance: string;
  error: string | null;
}

export interface QuestionRowJson {
  question: { question_id: string; text: string };
  summary: { text: string; mode: string } | null;
  cells: AnswerCellJson[];
  host_table: string | null;
}

export type ImageInput =
  | { path: string }
  | { url: string }
  | { filename: string; content_base64: string };

export type TablesResponse =
  | { ready: true; tables: TableSetJson }
  | { ready: false; progress: ProgressJson };

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly body: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ApiClient {
  createSession(prompt: string, images: ImageInput[]): Promise<{ session_id: string }>;
  getStatus(sessionId: string): Promise<ProgressJson>;
  getTables(sessionId: string): Promise<TablesResponse>;
  askQuestion(sessionId: string, text: string, hostTable: string): Promise<QuestionRowJson>;
}

async function parseBody(response: Response): Promise<unknown> {
  try {
    return await response.json();
  } catch {
    return null;
  }
}

export class HttpApiClient implements ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    return response;
  }

  async createSession(prompt: string, images: ImageInput[]): Promise<{ session_id: string }> {
    const response = await this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({ prompt, images }),
    });
    const body = await parseBody(response);
    if (!response.ok) {
      throw new ApiError(`create session failed (${response.status})`, response.status, body);
    }
    return body as { session_id: string };
  }

  async getStatus(sessionId: string): Promise<ProgressJson> {
    const response = await this.request(`/sessions/${sessionId}`);
    const body = await parseBody(response);
    if (!response.ok) {
      throw new ApiError(`status failed (${response.status})`, response.status, body);
    }
    return body as ProgressJson;
  }

  async getTables(sessionId: string): Promise<TablesResponse> {
    const response = await this.request(`/sessions/${sessionId}/tables?format=json`);
    const body = await parseBody(response);
    if (response.status === 200) {
      return { ready: true, tables: body as TableSetJson };
    }
    if (response.status === 202) {
      return { ready: false, progress: body as ProgressJson };
    }
    throw new ApiError(`tables failed (${response.status})`, response.status, body);
  }

  async askQuestion(
    sessionId: string,
    text: string,
    hostTable: string,
  ): Promise<QuestionRowJson> {
    const response = await this.request(`/sessions/${sessionId}/questions`, {
      method: "POST",
      body: JSON.stringify({ text, host_table: hostTable }),
    });
    const body = await parseBody(response);
    if (!response.ok) {
      throw new ApiError(`question failed (${response.status})`, response.status, body);
    }
    return (body as { row: QuestionRowJson }).row;
  }
}
