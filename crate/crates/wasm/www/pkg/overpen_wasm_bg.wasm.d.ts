/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const adaptive_trace: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number, number];
export const list_densities: () => [number, number, number, number];
export const risk_curves: (a: number, b: number, c: number, d: bigint, e: number) => [number, number, number, number];
export const sample_and_select: (a: number, b: number, c: number, d: bigint, e: number, f: number, g: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
