import { defineConfig } from "vitest/config";

export default defineConfig({
  // The clinic service proxies nothing; the built bundle is served from its
  // static_dir, so all asset paths must stay relative.
  base: "./",
  build: {
    outDir: "dist",
    emptyOutDir: true,
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // e2e spawns the backend and trains a model on first run
    testTimeout: 20000,
    hookTimeout: 300000,
  },
});
