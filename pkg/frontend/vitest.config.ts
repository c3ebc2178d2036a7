import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // the parity suite spawns the python gateway and preprocesses a
    // dataset, which dominates the runtime
    testTimeout: 120_000,
    hookTimeout: 180_000,
  },
});
