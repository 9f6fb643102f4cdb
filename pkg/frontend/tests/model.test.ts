import { describe, expect, it } from "vitest";

import type { RobotView, SessionDocument } from "../src/api.js";
import {
  actuationParameters,
  advanceLabel,
  canAdvance,
  chartPoints,
  fabricationParameters,
  measuredCount,
  parseSlopes,
  sessionProgress,
  speedBadge,
  validateMeasurementForm,
} from "../src/model.js";

function robot(index: number, speed: number | null): RobotView {
  const names = [
    "laser_power",
    "scan_frequency",
    "polarization_angle",
    "thickness",
    "length",
    "curl_length",
    "tail_direction",
    "dye_concentration",
  ];
  return {
    robot_index: index,
    genotype: names.map(() => 0),
    parameters: names.map((name) => ({
      name,
      unit: "",
      value: 1,
      label: "1",
    })),
    measured: speed !== null,
    speed,
  };
}

function doc(measured: number, overrides: Partial<SessionDocument> = {}): SessionDocument {
  const robots = Array.from({ length: 8 }, (_, i) =>
    robot(i, i < measured ? i + 0.5 : null),
  );
  return {
    id: "abc",
    name: "test",
    algorithm: "ga",
    status: "collecting",
    current_generation: 0,
    max_generations: 5,
    population: 8,
    measured_count: measured,
    created_at: null,
    seed: 1,
    config: {},
    robots,
    completed_generations: [],
    missing_robots: robots.filter((r) => !r.measured).map((r) => r.robot_index),
    ...overrides,
  };
}

describe("advance gating", () => {
  it("is disabled until all eight robots are measured", () => {
    expect(canAdvance(doc(6))).toBe(false);
    expect(advanceLabel(doc(6))).toBe("Advance (6/8 measured)");
    expect(canAdvance(doc(8))).toBe(true);
    expect(advanceLabel(doc(8))).toBe("Advance (8/8 measured)");
  });

  it("stays disabled on a complete session", () => {
    expect(canAdvance(doc(8, { status: "complete" }))).toBe(false);
  });

  it("counts measured robots from the cards", () => {
    expect(measuredCount(doc(3))).toBe(3);
  });
});

describe("speed badge", () => {
  it("prints the service value verbatim", () => {
    expect(speedBadge(robot(0, 1))).toBe("1 cm/min");
    expect(speedBadge(robot(0, 2.75))).toBe("2.75 cm/min");
  });

  it("offers entry for unmeasured robots", () => {
    expect(speedBadge(robot(0, null))).toBe("not measured");
  });
});

describe("progress chart", () => {
  it("has one point per completed generation", () => {
    const history = [
      { generation: 0, best_speed: 1.2, best_robot_index: 3 },
      { generation: 1, best_speed: 4.0, best_robot_index: 0 },
    ];
    const points = chartPoints(doc(0, { completed_generations: history }));
    expect(points).toEqual([
      { generation: 0, bestSpeed: 1.2 },
      { generation: 1, bestSpeed: 4.0 },
    ]);
  });

  it("is empty before the first advance", () => {
    expect(chartPoints(doc(8))).toEqual([]);
  });
});

describe("card grouping", () => {
  it("splits fabrication and actuation blocks", () => {
    const r = robot(0, null);
    expect(fabricationParameters(r).map((p) => p.name)).toEqual([
      "thickness",
      "length",
      "curl_length",
      "tail_direction",
      "dye_concentration",
    ]);
    expect(actuationParameters(r).map((p) => p.name)).toEqual([
      "laser_power",
      "scan_frequency",
      "polarization_angle",
    ]);
  });
});

describe("measurement form validation", () => {
  it("parses comma separated slopes", () => {
    expect(parseSlopes("1.0, 1.1, 0.9, 1.0, 1.0")).toEqual([1.0, 1.1, 0.9, 1.0, 1.0]);
    expect(parseSlopes("-0.2 -0.2 -0.2 -0.2 -0.2")).toEqual([
      -0.2, -0.2, -0.2, -0.2, -0.2,
    ]);
  });

  it("rejects non numeric input without submitting", () => {
    expect(parseSlopes("1.0, fast, 0.9")).toBeNull();
    const form = validateMeasurementForm("1.0, nope", "1.0", "");
    expect(form.kind).toBe("invalid");
  });

  it("accepts a direct speed", () => {
    expect(validateMeasurementForm("", "", "10.0")).toEqual({
      kind: "speed",
      speed: 10.0,
    });
  });

  it("rejects negative speed and mixed entry", () => {
    expect(validateMeasurementForm("", "", "-1").kind).toBe("invalid");
    expect(validateMeasurementForm("1", "1", "2").kind).toBe("invalid");
    expect(validateMeasurementForm("", "", "").kind).toBe("invalid");
  });

  it("builds a slopes payload", () => {
    expect(validateMeasurementForm("1,1,1,1,1", "-0.2,-0.2,-0.2,-0.2,-0.2", "")).toEqual({
      kind: "slopes",
      slopesA: [1, 1, 1, 1, 1],
      slopesB: [-0.2, -0.2, -0.2, -0.2, -0.2],
    });
  });
});

describe("session progress", () => {
  it("is one-based for the operator", () => {
    expect(sessionProgress(doc(0))).toBe("generation 1 of 5");
  });
});
