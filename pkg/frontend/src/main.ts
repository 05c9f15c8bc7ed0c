import { ApiClient } from "./api";
import { ExplorerApp } from "./app";

const baseUrl = (window as unknown as { API_BASE?: string }).API_BASE ?? "";
const app = new ExplorerApp(new ApiClient(baseUrl), document.getElementById("app")!);
void app.init();

(window as unknown as { explorer?: ExplorerApp }).explorer = app;
