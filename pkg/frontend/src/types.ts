/** Wire types mirroring the engine's JSON surface. */

export interface DiffSpan {
  kind: "insert" | "delete" | "replace";
  parent_start: number;
  parent_end: number;
  child_start: number;
  child_end: number;
}

export interface GenParams {
  image_count: number;
  seed: number | null;
  width: number;
  height: number;
  model_id: string;
}

export interface ImageRecord {
  content_hash: string;
  byte_length: number;
  mark: "like" | "dislike" | "neutral";
}

export interface PromptRecord {
  text: string;
  params: GenParams;
  images: ImageRecord[];
  status: "draft" | "pending" | "complete" | "failed";
}

export interface Placeholder {
  start: number;
  end: number;
  dimension_id: string;
}

export interface Dimension {
  dimension_id: string;
  name: string;
  color_index: number;
  values: string[];
}

export interface FixedAssignment {
  name: string;
  value: string;
  start: number;
  end: number;
  color_index: number;
}

export interface CellDoc {
  coords: number[];
  prompt_text: string;
  record: PromptRecord;
}

export interface SubspaceDoc {
  template: { base_text: string; placeholders: Placeholder[] };
  dimensions: Dimension[];
  fixed: FixedAssignment[];
  base_params: GenParams;
  cells: CellDoc[];
}

/** Nested dimensional-stacking layout; leaves address cells by coords. */
export type GridNode =
  | { cell: number[] }
  | {
      level: number;
      x_dim: number;
      y_dim: number | null;
      cols: number;
      rows: number;
      entries: GridNode[][];
    };

export interface NodeView {
  node_id: string;
  kind: "prompt" | "subspace";
  parent_id: string | null;
  x: number;
  y: number;
  pinned: boolean;
  minimized: boolean;
  created_at: number;
  form: "input" | "prompt" | "image" | null;
  diff: DiffSpan[];
  record?: PromptRecord;
  subspace?: SubspaceDoc;
  score: number;
  color_class: "like" | "dislike" | "neutral";
  grid?: GridNode;
  base_text_with_fixed?: string;
  cell_scores?: Record<string, number>;
}

export interface SessionSnapshot {
  sequence: number;
  document: { session: { session_id: string } } & Record<string, unknown>;
  nodes: NodeView[];
}

export interface UiEvent {
  sequence: number;
  kind: "node_updated" | "images_ready" | "job_progress" | "session_saved";
  body: {
    node?: NodeView;
    nodes?: NodeView[];
    node_id?: string;
    coords?: number[] | null;
    job_id?: string;
    state?: string;
    error?: string;
    session_id?: string;
  };
}

export interface MinimapEntry {
  node_id: string;
  x: number;
  y: number;
  color_class: "like" | "dislike" | "neutral";
  intensity: number;
  pinned: boolean;
}

/** Categorical 8-slot palette (ColorBrewer Set2): green, orange, purple,
 * pink, then the remaining slots. */
export const DIMENSION_PALETTE = [
  "#66c2a5", "#fc8d62", "#8da0cb", "#e78ac3",
  "#a6d854", "#ffd92f", "#e5c494", "#b3b3b3",
] as const;

export function dimensionColor(colorIndex: number): string {
  return DIMENSION_PALETTE[colorIndex % DIMENSION_PALETTE.length];
}

export const LIKE_COLOR = "#4a90d9";    // blue: positive preference
export const DISLIKE_COLOR = "#e8833a"; // orange: negative preference

export function coordsKey(coords: number[]): string {
  return coords.join(",");
}
