import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the engine-interop suite decodes 50 sequences and shells out to
    // the Python CLI; give it room
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
