import { ApiClient } from "./api.js";
import { SessionConsole } from "./controller.js";

function start(): void {
  const root = document.getElementById("console-root");
  if (!root) return;
  const params = new URLSearchParams(window.location.search);
  const session = params.get("session");
  const base = params.get("api") ?? "";
  if (!session) {
    root.textContent =
      "open this page with ?session=<id> (and ?api=<service base url> " +
      "when the service is not on this origin)";
    return;
  }
  const console_ = new SessionConsole(root, new ApiClient(base, session));
  console_.start();
}

document.addEventListener("DOMContentLoaded", start);
