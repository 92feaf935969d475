/* tslint:disable */
/* eslint-disable */

/**
 * The data-driven constant as a function of the fraction of models used.
 */
export function adaptive_trace(density_id: string, n: number, seed: bigint, max_cells: number, per_sample: boolean): string;

export function list_densities(): string;

/**
 * Bias, true and empirical excess risks of every model on one sample,
 * next to the AIC and AIC₁ penalties.
 */
export function risk_curves(density_id: string, n: number, seed: bigint, max_cells: number): string;

/**
 * Draws a sample and selects a histogram with the given criterion string.
 */
export function sample_and_select(density_id: string, n: number, seed: bigint, criterion: string, max_cells: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly adaptive_trace: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number, number];
    readonly list_densities: () => [number, number, number, number];
    readonly risk_curves: (a: number, b: number, c: number, d: bigint, e: number) => [number, number, number, number];
    readonly sample_and_select: (a: number, b: number, c: number, d: bigint, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
