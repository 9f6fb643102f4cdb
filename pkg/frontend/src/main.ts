import { ApiClient } from "./api.js";
import { Console } from "./ui.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
const console_ = new Console(new ApiClient(""), root);
window.addEventListener("hashchange", () => void console_.route());
void console_.route();
