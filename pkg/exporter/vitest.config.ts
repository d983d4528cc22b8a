import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    testTimeout: 240_000,
    hookTimeout: 240_000,
    // tfjs keeps a persistent backend; run files sequentially for
    // deterministic memory behavior
    fileParallelism: false,
  },
});
