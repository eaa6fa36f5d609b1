import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globalSetup: "./tests/global-setup.ts",
    // the suites share one fixture directory and time tf.js work; keep
    // files sequential so neither interferes with the other
    fileParallelism: false,
    testTimeout: 120_000,
    hookTimeout: 240_000,
  },
});
