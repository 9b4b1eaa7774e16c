import { ServiceClient } from "./api";
import { AnnotationApp } from "./app";

const params = new URLSearchParams(window.location.search);
const base = params.get("service") ?? "http://127.0.0.1:8700";
const taskId = params.get("task") ?? "t1";

const root = document.getElementById("app");
if (root) {
  const app = new AnnotationApp(root, new ServiceClient(base), taskId);
  void app.start();
}
