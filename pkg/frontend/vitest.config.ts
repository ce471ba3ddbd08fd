import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // every API call shells out to the Python CLI, so tests are I/O bound
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
