/** Boot: read the runtime config, mount the console. */

import { App } from "./app.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (root === null) throw new Error("missing #app mount point");
  let apiBase: string;
  try {
    const response = await fetch("./ui-config.json");
    const config = (await response.json()) as { apiBase?: string };
    if (typeof config.apiBase !== "string" || config.apiBase === "") {
      throw new Error('ui-config.json must carry {"apiBase": "<url>"}');
    }
    apiBase = config.apiBase.replace(/\/+$/, "");
  } catch (exc) {
    root.textContent = `cannot load ui-config.json: ${String(exc)}`;
    return;
  }
  new App(apiBase, root).start();
}

boot().catch((exc: unknown) => {
  document.body.textContent = `marketplace-ui failed to start: ${String(exc)}`;
});
