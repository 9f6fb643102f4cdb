// Pure view-model helpers. No optimization math lives in the client: these
// only reshape and validate what the service already computed.

import type { ParameterView, RobotView, SessionDocument } from "./api.js";

// matches the card grouping of the robot drawings: body first, beam second
const FABRICATION_FIELDS = [
  "thickness",
  "length",
  "curl_length",
  "tail_direction",
  "dye_concentration",
];
const ACTUATION_FIELDS = ["laser_power", "scan_frequency", "polarization_angle"];

export function measuredCount(doc: SessionDocument): number {
  return doc.robots.filter((r) => r.measured).length;
}

export function canAdvance(doc: SessionDocument): boolean {
  return doc.status === "collecting" && measuredCount(doc) === doc.population;
}

export function advanceLabel(doc: SessionDocument): string {
  return `Advance (${measuredCount(doc)}/${doc.population} measured)`;
}

export function speedBadge(robot: RobotView): string {
  // the number is printed exactly as the service returned it
  return robot.measured ? `${robot.speed} cm/min` : "not measured";
}

export interface ChartPoint {
  generation: number;
  bestSpeed: number;
}

export function chartPoints(doc: SessionDocument): ChartPoint[] {
  return doc.completed_generations.map((g) => ({
    generation: g.generation,
    bestSpeed: g.best_speed,
  }));
}

function pick(parameters: ParameterView[], names: string[]): ParameterView[] {
  const byName = new Map(parameters.map((p) => [p.name, p]));
  return names
    .map((name) => byName.get(name))
    .filter((p): p is ParameterView => p !== undefined);
}

export function fabricationParameters(robot: RobotView): ParameterView[] {
  return pick(robot.parameters, FABRICATION_FIELDS);
}

export function actuationParameters(robot: RobotView): ParameterView[] {
  return pick(robot.parameters, ACTUATION_FIELDS);
}

export function parseSlopes(text: string): number[] | null {
  const parts = text
    .split(/[\s,;]+/)
    .map((part) => part.trim())
    .filter((part) => part.length > 0);
  if (parts.length === 0) {
    return null;
  }
  const values = parts.map((part) => Number(part));
  return values.every((v) => Number.isFinite(v)) ? values : null;
}

export type MeasurementForm =
  | { kind: "slopes"; slopesA: number[]; slopesB: number[] }
  | { kind: "speed"; speed: number }
  | { kind: "invalid"; error: string };

export function validateMeasurementForm(
  slopesAText: string,
  slopesBText: string,
  speedText: string,
): MeasurementForm {
  const hasSlopes = slopesAText.trim() !== "" || slopesBText.trim() !== "";
  const hasSpeed = speedText.trim() !== "";
  if (hasSlopes && hasSpeed) {
    return { kind: "invalid", error: "enter slopes or a direct speed, not both" };
  }
  if (hasSpeed) {
    const speed = Number(speedText.trim());
    if (!Number.isFinite(speed) || speed < 0) {
      return { kind: "invalid", error: "direct speed must be a number >= 0" };
    }
    return { kind: "speed", speed };
  }
  if (!hasSlopes) {
    return { kind: "invalid", error: "enter 5+5 slopes or a direct speed" };
  }
  const slopesA = parseSlopes(slopesAText);
  const slopesB = parseSlopes(slopesBText);
  if (slopesA === null || slopesB === null) {
    return { kind: "invalid", error: "slopes must be numbers (comma separated)" };
  }
  return { kind: "slopes", slopesA, slopesB };
}

export function sessionProgress(doc: SessionDocument): string {
  return `generation ${doc.current_generation + 1} of ${doc.max_generations}`;
}
