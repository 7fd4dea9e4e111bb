import { ApiClient } from "./api";
import { ConsoleState } from "./state";
import { mount } from "./view";

// Backend base URL is injected at runtime: a <meta name="backend-base-url">
// tag wins, otherwise same-origin. Never hard-coded.
function backendBaseUrl(): string {
  const meta = document.querySelector<HTMLMetaElement>('meta[name="backend-base-url"]');
  return meta?.content ?? "";
}

const root = document.getElementById("app");
if (root) {
  mount(root, new ConsoleState(new ApiClient(backendBaseUrl())));
}
