// Live-region announcements. Regions are cleared before each message so
// repeated identical announcements are still spoken.

export const STATUS_REGION_ID = "a11y-status";
export const ALERT_REGION_ID = "a11y-alert";

export function ensureLiveRegions(root: Document = document): void {
  if (!root.getElementById(STATUS_REGION_ID)) {
    const status = root.createElement("div");
    status.id = STATUS_REGION_ID;
    status.setAttribute("role", "status");
    status.setAttribute("aria-live", "polite");
    status.className = "sr-only";
    root.body.appendChild(status);
  }
  if (!root.getElementById(ALERT_REGION_ID)) {
    const alert = root.createElement("div");
    alert.id = ALERT_REGION_ID;
    alert.setAttribute("role", "alert");
    alert.setAttribute("aria-live", "assertive");
    alert.className = "sr-only";
    root.body.appendChild(alert);
  }
}

function announce(targetId: string, text: string, root: Document): void {
  const el = root.getElementById(targetId);
  if (!el) return;
  el.textContent = "";
  window.setTimeout(() => {
    el.textContent = text;
  }, 0);
}

export function announcePolite(text: string, root: Document = document): void {
  announce(STATUS_REGION_ID, text, root);
}

export function announceAssertive(text: string, root: Document = document): void {
  announce(ALERT_REGION_ID, text, root);
}
