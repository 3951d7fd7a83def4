/* tslint:disable */
/* eslint-disable */

/**
 * One fit and its de-biased version. Returns rows
 * `[truth, w_hat, w_bar, predicted_mean, predicted_sd]`, one per coordinate.
 */
export function debias_histogram(structure: string, sparsity: number, log_lambda: number, p: number, seed: bigint): Float64Array;

/**
 * Theoretical precision and power along a grid of `log10 λ`.
 * Returns rows `[log_lambda, precision, power, tau]`; a cell where the
 * solver fails reports `NaN` for its three values.
 */
export function lambda_sweep(structure: string, sparsity: number, p: number, log_lambda: Float64Array, mc_samples: number): Float64Array;

/**
 * Proximal map `u*(m)` of the named loss at fixed `q`, on `points` values of
 * `m` spread evenly over `[m_min, m_max]`. Returns `[m0, u0, m1, u1, ...]`.
 */
export function prox_curve(loss: string, q: number, m_min: number, m_max: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly debias_histogram: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly lambda_sweep: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly prox_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
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
