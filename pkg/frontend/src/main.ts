import { TriageApi } from "./api.js";
import { mount } from "./app.js";

const params = new URLSearchParams(window.location.search);
const rater = params.get("rater") ?? window.localStorage.getItem("rater") ?? "rater1";
window.localStorage.setItem("rater", rater);
const token = params.get("token") ?? "";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app root element");

const api = new TriageApi((input, init) => fetch(input, init), "", token);
mount(root, api, { rater });
