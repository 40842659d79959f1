import { AgentApi } from "./api.js";
import { ChatApp } from "./app.js";
import { speechCapture } from "./speech.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://localhost:8000";
const studentId = params.get("student") ?? "web-student";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}

const app = new ChatApp(root, new AgentApi(baseUrl), studentId, speechCapture());
void app.start(params.get("locale") ?? "en");
