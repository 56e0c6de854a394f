/** Browser entry point: mount the console and connect to the service. */

import { createConsole } from "./app.js";

const params = new URLSearchParams(window.location.search);
const url = params.get("ws") ?? "ws://127.0.0.1:8765";
const root = document.getElementById("app");
if (root !== null) {
  const app = createConsole(root, { url });
  app.controller.connect();
}
