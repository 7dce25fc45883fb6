import { beforeEach, describe, expect, it } from "vitest";

import { clearDraft, loadDraft, saveDraft } from "../src/drafts.js";

describe("draft persistence", () => {
  beforeEach(() => localStorage.clear());

  it("round-trips a draft per segment", () => {
    saveDraft(3, "halb editierter satz");
    expect(loadDraft(3)).toBe("halb editierter satz");
    expect(loadDraft(4)).toBeNull();
  });

  it("clear removes exactly one segment's draft", () => {
    saveDraft(1, "eins");
    saveDraft(2, "zwei");
    clearDraft(1);
    expect(loadDraft(1)).toBeNull();
    expect(loadDraft(2)).toBe("zwei");
  });

  it("overwrites on save", () => {
    saveDraft(5, "v1");
    saveDraft(5, "v2");
    expect(loadDraft(5)).toBe("v2");
  });
});
