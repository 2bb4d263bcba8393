/* tslint:disable */
/* eslint-disable */

export class FitSummary {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Fitted mean directions in degrees, folded into `[-90°, 90°)`.
     */
    readonly angles: Float64Array;
    readonly concentrations: Float64Array;
    readonly iterations: number;
    readonly priors: Float64Array;
}

export class HistogramComparison {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly confidence: Float64Array;
    readonly norm: Float64Array;
    readonly points: number;
    readonly ratio_confidence: number;
    readonly ratio_norm: number;
}

export function density_curve(k: number, points: number): Float64Array;

export function fit_demo(angles: Float64Array, k: number, per_cluster: number, outlier_share: number, weighted: boolean, seed: number): FitSummary;

export function histogram_comparison(angles: Float64Array, seconds: number, q: number, bins: number, seed: number): HistogramComparison;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_fitsummary_free: (a: number, b: number) => void;
    readonly __wbg_histogramcomparison_free: (a: number, b: number) => void;
    readonly density_curve: (a: number, b: number) => [number, number, number, number];
    readonly fit_demo: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly fitsummary_angles: (a: number) => [number, number];
    readonly fitsummary_concentrations: (a: number) => [number, number];
    readonly fitsummary_iterations: (a: number) => number;
    readonly fitsummary_priors: (a: number) => [number, number];
    readonly histogram_comparison: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly histogramcomparison_confidence: (a: number) => [number, number];
    readonly histogramcomparison_norm: (a: number) => [number, number];
    readonly histogramcomparison_points: (a: number) => number;
    readonly histogramcomparison_ratio_confidence: (a: number) => number;
    readonly histogramcomparison_ratio_norm: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
