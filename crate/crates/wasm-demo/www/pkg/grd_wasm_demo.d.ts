/* tslint:disable */
/* eslint-disable */

/**
 * Optimal warping path between two scalar sequences.
 */
export class Alignment {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    cost(): number;
    /**
     * Flattened `(i, j)` steps.
     */
    steps(): Uint32Array;
}

/**
 * Eigenbasis of a path or cycle graph.
 */
export class Basis {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * GFCC (`kind = "gfcc"`) or GFLC (`kind = "gflc"`) of one frame.
     */
    cepstrum(kind: string, frame: Float64Array, n_ceps: number): Float64Array;
    eigenvalues(): Float64Array;
    gft(frame: Float64Array): Float64Array;
    constructor(topology: string, operator: string, n: number);
    size(): number;
    /**
     * Eigenvector `k`, in ascending eigenvalue order.
     */
    vector(k: number): Float64Array;
}

export function align(g: Float64Array, s: Float64Array): Alignment;

/**
 * Orthonormal DCT-II, truncated to `n_out` outputs.
 */
export function dct(x: Float64Array, n_out: number): Float64Array;

/**
 * Sum of `harmonics` partials of `f0` with 1/h amplitudes, Hamming-windowed.
 */
export function harmonic_frame(n: number, f0: number, sample_rate: number, harmonics: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_alignment_free: (a: number, b: number) => void;
    readonly __wbg_basis_free: (a: number, b: number) => void;
    readonly align: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly alignment_cost: (a: number) => number;
    readonly alignment_steps: (a: number) => [number, number];
    readonly basis_cepstrum: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly basis_eigenvalues: (a: number) => [number, number];
    readonly basis_gft: (a: number, b: number, c: number) => [number, number, number, number];
    readonly basis_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly basis_size: (a: number) => number;
    readonly basis_vector: (a: number, b: number) => [number, number, number, number];
    readonly dct: (a: number, b: number, c: number) => [number, number, number, number];
    readonly harmonic_frame: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
