/* tslint:disable */
/* eslint-disable */

/**
 * JavaScript face of [`Demo`].
 */
export class Modeler {
    free(): void;
    [Symbol.dispose](): void;
    handleOpen(): boolean;
    indices(): Uint32Array;
    static models(): string[];
    constructor(model: string, max_depth: number);
    normals(): Float32Array;
    positions(): Float32Array;
    setFaceScale(scale: number): void;
    setModified(modified: boolean): void;
    statsJson(): string;
    toggleHandle(): void;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_modeler_free: (a: number, b: number) => void;
    readonly modeler_handleOpen: (a: number) => number;
    readonly modeler_indices: (a: number) => [number, number];
    readonly modeler_models: () => [number, number];
    readonly modeler_new: (a: number, b: number, c: number) => [number, number, number];
    readonly modeler_normals: (a: number) => [number, number];
    readonly modeler_positions: (a: number) => [number, number];
    readonly modeler_setFaceScale: (a: number, b: number) => [number, number];
    readonly modeler_setModified: (a: number, b: number) => [number, number];
    readonly modeler_statsJson: (a: number) => [number, number];
    readonly modeler_toggleHandle: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
