/**
 * Local draft persistence: an in-progress edit survives a page reload
 * until it is submitted or its lease expires.
 */

const PREFIX = "pedal.draft.";

const key = (segmentId: number) => `${PREFIX}${segmentId}`;

export function saveDraft(segmentId: number, text: string): void {
  try {
    localStorage.setItem(key(segmentId), text);
  } catch {
    // storage full or unavailable; drafts are best-effort
  }
}

export function loadDraft(segmentId: number): string | null {
  try {
    return localStorage.getItem(key(segmentId));
  } catch {
    return null;
  }
}

export function clearDraft(segmentId: number): void {
  try {
    localStorage.removeItem(key(segmentId));
  } catch {
    // ignore
  }
}
