/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Hyperplane density of iterate `k` with bandwidth `tau`.
     */
    density(k: number, res: number, tau: number): Float64Array;
    /**
     * `[linf_0, l2_0, linf_1, l2_1, ...]`.
     */
    errors(): Float64Array;
    exact(res: number): Float64Array;
    /**
     * Values of iterate `k` on a `res × res` grid, rows along `x`.
     */
    field(k: number, res: number): Float64Array;
    gamma(): number;
    /**
     * Feature anchors and shape parameters as `[x, y, gamma, ...]`.
     */
    gammas(k: number): Float64Array;
    /**
     * Number of stored iterates (`K + 1`).
     */
    iterations(): number;
    /**
     * Runs the whole loop. `gamma <= 0` calibrates the shape parameter.
     */
    constructor(sharpness: number, subdomains: number, features: number, points: number, iterations: number, monitor: number, gamma: number, seed: number);
    /**
     * Interior collocation points of iterate `k` as `[x0, y0, x1, y1, ...]`.
     */
    points(k: number): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_density: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_errors: (a: number) => [number, number];
    readonly demo_exact: (a: number, b: number) => [number, number];
    readonly demo_field: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_gamma: (a: number) => number;
    readonly demo_gammas: (a: number, b: number) => [number, number, number, number];
    readonly demo_iterations: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly demo_points: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
