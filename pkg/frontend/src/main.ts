import { startApp } from "./app";
import "./style.css";

const root = document.getElementById("app");
if (root) {
  void startApp(root);
}
