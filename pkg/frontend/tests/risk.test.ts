import { beforeEach, describe, expect, it } from "vitest";

import { renderRiskPanel } from "../src/views/risk";

let container: HTMLElement;

beforeEach(() => {
  container = document.createElement("div");
  document.body.replaceChildren(container);
});

function entries(): HTMLElement[] {
  return Array.from(container.querySelectorAll<HTMLElement>(".risk-entry"));
}

describe("renderRiskPanel", () => {
  it("labels three diseases with one-decimal percentages", () => {
    renderRiskPanel(container, {
      diabetes: 0.81, heart_disease: 0.12, hypertension: 0.05,
    });
    const texts = entries().map((e) => e.textContent);
    expect(texts).toEqual([
      "Diabetes81.0%", "Heart disease12.0%", "Hypertension5.0%",
    ]);
  });

  it("applies alert styling at the default 0.7 threshold", () => {
    renderRiskPanel(container, {
      diabetes: 0.81, heart_disease: 0.12, hypertension: 0.05,
    });
    const flagged = entries().filter((e) => e.classList.contains("alert"));
    expect(flagged).toHaveLength(1);
    expect(flagged[0].dataset.disease).toBe("diabetes");
  });

  it("treats the threshold as inclusive", () => {
    renderRiskPanel(container, {
      diabetes: 0.7, heart_disease: 0.699999, hypertension: 0,
    });
    const flagged = entries().filter((e) => e.classList.contains("alert"));
    expect(flagged.map((e) => e.dataset.disease)).toEqual(["diabetes"]);
  });

  it("honors per-disease threshold overrides", () => {
    renderRiskPanel(
      container,
      { diabetes: 0.81, heart_disease: 0.5, hypertension: 0.05 },
      { diabetes: 0.9, heart_disease: 0.4 },
    );
    const flagged = entries().filter((e) => e.classList.contains("alert"));
    expect(flagged.map((e) => e.dataset.disease)).toEqual(["heart_disease"]);
  });

  it("renders three 0.0% entries for all-zero risks", () => {
    renderRiskPanel(container, {
      diabetes: 0, heart_disease: 0, hypertension: 0,
    });
    const values = entries().map(
      (e) => e.querySelector(".risk-value")!.textContent);
    expect(values).toEqual(["0.0%", "0.0%", "0.0%"]);
    expect(entries().some((e) => e.classList.contains("alert"))).toBe(false);
  });

  it("shows a banner naming a missing field instead of crashing", () => {
    renderRiskPanel(container, { diabetes: 0.5, hypertension: 0.1 });
    const banner = container.querySelector(".error-banner");
    expect(banner).not.toBeNull();
    expect(banner!.textContent).toContain("heart_disease");
    expect(entries()).toHaveLength(0);
  });

  it("rejects non-numeric probabilities with a banner", () => {
    renderRiskPanel(container, {
      diabetes: "high", heart_disease: 0.1, hypertension: 0.1,
    });
    expect(container.querySelector(".error-banner")!.textContent)
      .toContain("diabetes");
  });

  it("rejects a null payload with a banner", () => {
    renderRiskPanel(container, null);
    expect(container.querySelector(".error-banner")).not.toBeNull();
  });

  it("replaces an earlier banner on a good render", () => {
    renderRiskPanel(container, null);
    renderRiskPanel(container, {
      diabetes: 0.2, heart_disease: 0.3, hypertension: 0.4,
    });
    expect(container.querySelector(".error-banner")).toBeNull();
    expect(entries()).toHaveLength(3);
  });

  it("keeps the exact server probability on each entry", () => {
    const risks = {
      diabetes: 0.8123456789, heart_disease: 0.1, hypertension: 0.05,
    };
    renderRiskPanel(container, risks);
    expect(entries().map((e) => Number(e.dataset.probability)))
      .toEqual([risks.diabetes, risks.heart_disease, risks.hypertension]);
  });
});
