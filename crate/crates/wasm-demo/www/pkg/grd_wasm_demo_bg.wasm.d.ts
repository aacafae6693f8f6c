/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_alignment_free: (a: number, b: number) => void;
export const __wbg_basis_free: (a: number, b: number) => void;
export const align: (a: number, b: number, c: number, d: number) => [number, number, number];
export const alignment_cost: (a: number) => number;
export const alignment_steps: (a: number) => [number, number];
export const basis_cepstrum: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const basis_eigenvalues: (a: number) => [number, number];
export const basis_gft: (a: number, b: number, c: number) => [number, number, number, number];
export const basis_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const basis_size: (a: number) => number;
export const basis_vector: (a: number, b: number) => [number, number, number, number];
export const dct: (a: number, b: number, c: number) => [number, number, number, number];
export const harmonic_frame: (a: number, b: number, c: number, d: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
