/** Wire types mirroring the editing service documents. */

export type Region =
  | "EyeLeft"
  | "EyeRight"
  | "Nose"
  | "Mouth"
  | "Hair"
  | "Cheek"
  | "Ear"
  | "Body";

export interface GeneratedSource {
  kind: "generated";
  path: string;
}

export interface CatalogSource {
  kind: "catalog";
  category: "ears" | "bodies";
  index: number;
}

export type ComponentSource = GeneratedSource | CatalogSource;

export interface SceneComponent {
  id: string;
  region: Region;
  source: ComponentSource;
  center: [number, number];
  scale: number;
  z_order: number;
}

export interface SceneDoc {
  schema_version: number;
  canvas_size: [number, number];
  style: Record<string, string>;
  layout: unknown;
  components: SceneComponent[];
}

/** Exactly one PATCH shape per control. */
export type Mutation =
  | { center: [number, number] }
  | { scale: number }
  | { z_order: number }
  | { source: ComponentSource };

export interface CatalogListing {
  ears: { index: number }[];
  bodies: { index: number; tag: string }[];
}

export interface ExportResult {
  scene_path: string;
  png_path: string;
}

export interface PatchLogEntry {
  componentId: string;
  mutation: Mutation;
}
