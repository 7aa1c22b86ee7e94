import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // The end-to-end suite boots the federation's services as subprocesses.
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
