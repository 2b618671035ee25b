import { App } from "./app.js";
import { HttpApiClient } from "./api.js";

const root = document.getElementById("app");
if (root) {
  new App(root, new HttpApiClient("")).start();
}
