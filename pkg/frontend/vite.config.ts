/// <reference types="vitest/config" />
import { defineConfig } from "vite";

export default defineConfig({
  // relative asset urls so the build works wherever the service mounts it
  base: "./",
  build: {
    outDir: "dist",
    sourcemap: true,
  },
  test: {
    environment: "happy-dom",
  },
});
