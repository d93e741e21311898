/* tslint:disable */
/* eslint-disable */

export class GuardbandCurve {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly amp_variance: Float64Array;
    readonly guard_band_ghz: Float64Array;
    readonly phase_std: Float64Array;
}

export class Planner {
    free(): void;
    [Symbol.dispose](): void;
    curve(d_res_il: string, n_pumps: number, p_pump_dbm: number, spacing_ghz: number): GuardbandCurve;
    /**
     * Distinct maps in the table, comma separated, in LUT order.
     */
    maps(): string;
    /**
     * Parses a LUT CSV; an empty string selects the bundled table.
     */
    constructor(csv: string);
    /**
     * Recommended guard band in GHz; NaN when unattainable within the table.
     */
    recommend(max_phase_std: number, d_res_il: string, n_pumps: number, p_pump_dbm: number, spacing_ghz: number): number;
}

export class PointResult {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly amp_variance: number;
    readonly fraction_below_10ghz: number;
    readonly pdf_density: Float64Array;
    readonly pdf_phase: Float64Array;
    readonly phase_std: number;
    /**
     * rad²/Hz.
     */
    readonly psd: Float64Array;
    /**
     * Hz.
     */
    readonly psd_frequency: Float64Array;
}

/**
 * Runs one probe + pump point on a short link. `d_res_il` is ps/nm per span or "UT".
 */
export function simulate_point(d_res_il: string, delta_f_ghz: number, p_pump_dbm: number, n_spans: number, seed: number): PointResult;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_guardbandcurve_free: (a: number, b: number) => void;
    readonly __wbg_planner_free: (a: number, b: number) => void;
    readonly __wbg_pointresult_free: (a: number, b: number) => void;
    readonly guardbandcurve_amp_variance: (a: number) => [number, number];
    readonly guardbandcurve_guard_band_ghz: (a: number) => [number, number];
    readonly guardbandcurve_phase_std: (a: number) => [number, number];
    readonly planner_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly planner_maps: (a: number) => [number, number];
    readonly planner_new: (a: number, b: number) => [number, number, number];
    readonly planner_recommend: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly pointresult_amp_variance: (a: number) => number;
    readonly pointresult_fraction_below_10ghz: (a: number) => number;
    readonly pointresult_pdf_density: (a: number) => [number, number];
    readonly pointresult_pdf_phase: (a: number) => [number, number];
    readonly pointresult_phase_std: (a: number) => number;
    readonly pointresult_psd: (a: number) => [number, number];
    readonly pointresult_psd_frequency: (a: number) => [number, number];
    readonly simulate_point: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
