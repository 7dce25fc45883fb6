import { ApiClient } from "./api.js";
import { Workbench } from "./app.js";

function editorId(): string {
  const params = new URLSearchParams(location.search);
  const fromUrl = params.get("editor");
  if (fromUrl) {
    localStorage.setItem("pedal.editor", fromUrl);
    return fromUrl;
  }
  return localStorage.getItem("pedal.editor") ?? "linguist";
}

const root = document.getElementById("app");
if (root) {
  const params = new URLSearchParams(location.search);
  const api = new ApiClient("", params.get("token") ?? undefined);
  void new Workbench(root, api, { editorId: editorId() }).start();
}
