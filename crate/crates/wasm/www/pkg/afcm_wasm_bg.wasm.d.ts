/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_density: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_errors: (a: number) => [number, number];
export const demo_exact: (a: number, b: number) => [number, number];
export const demo_field: (a: number, b: number, c: number) => [number, number, number, number];
export const demo_gamma: (a: number) => number;
export const demo_gammas: (a: number, b: number) => [number, number, number, number];
export const demo_iterations: (a: number) => number;
export const demo_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const demo_points: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
