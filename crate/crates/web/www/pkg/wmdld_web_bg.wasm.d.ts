/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_fitsummary_free: (a: number, b: number) => void;
export const __wbg_histogramcomparison_free: (a: number, b: number) => void;
export const density_curve: (a: number, b: number) => [number, number, number, number];
export const fit_demo: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const fitsummary_angles: (a: number) => [number, number];
export const fitsummary_concentrations: (a: number) => [number, number];
export const fitsummary_iterations: (a: number) => number;
export const fitsummary_priors: (a: number) => [number, number];
export const histogram_comparison: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const histogramcomparison_confidence: (a: number) => [number, number];
export const histogramcomparison_norm: (a: number) => [number, number];
export const histogramcomparison_points: (a: number) => number;
export const histogramcomparison_ratio_confidence: (a: number) => number;
export const histogramcomparison_ratio_norm: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
