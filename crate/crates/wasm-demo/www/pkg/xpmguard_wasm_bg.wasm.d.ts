/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_guardbandcurve_free: (a: number, b: number) => void;
export const __wbg_planner_free: (a: number, b: number) => void;
export const __wbg_pointresult_free: (a: number, b: number) => void;
export const guardbandcurve_amp_variance: (a: number) => [number, number];
export const guardbandcurve_guard_band_ghz: (a: number) => [number, number];
export const guardbandcurve_phase_std: (a: number) => [number, number];
export const planner_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const planner_maps: (a: number) => [number, number];
export const planner_new: (a: number, b: number) => [number, number, number];
export const planner_recommend: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const pointresult_amp_variance: (a: number) => number;
export const pointresult_fraction_below_10ghz: (a: number) => number;
export const pointresult_pdf_density: (a: number) => [number, number];
export const pointresult_pdf_phase: (a: number) => [number, number];
export const pointresult_phase_std: (a: number) => number;
export const pointresult_psd: (a: number) => [number, number];
export const pointresult_psd_frequency: (a: number) => [number, number];
export const simulate_point: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
