/** Browser entry point: mount the workbench against the same-origin API
 *  (the dev server proxies /v1 to a local `sonoscope serve`). */

import "./style.css";
import { ApiClient } from "./api";
import { createWorkbench } from "./app";

declare global {
  interface Window {
    SONOSCOPE_API?: string;
  }
}

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const app = createWorkbench(root, new ApiClient(window.SONOSCOPE_API ?? ""));
void app.actions.init();
