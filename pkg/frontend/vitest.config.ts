import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    // every test shells out to the engine CLI, so allow generous budgets
    testTimeout: 300_000,
    hookTimeout: 300_000,
  },
});
