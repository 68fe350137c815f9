/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_modeler_free: (a: number, b: number) => void;
export const modeler_handleOpen: (a: number) => number;
export const modeler_indices: (a: number) => [number, number];
export const modeler_models: () => [number, number];
export const modeler_new: (a: number, b: number, c: number) => [number, number, number];
export const modeler_normals: (a: number) => [number, number];
export const modeler_positions: (a: number) => [number, number];
export const modeler_setFaceScale: (a: number, b: number) => [number, number];
export const modeler_setModified: (a: number, b: number) => [number, number];
export const modeler_statsJson: (a: number) => [number, number];
export const modeler_toggleHandle: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
