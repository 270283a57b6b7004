/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_carsdemo_free: (a: number, b: number) => void;
export const carsdemo_explain: (a: number, b: number, c: number) => [number, number, number, number];
export const carsdemo_induce: (a: number, b: number, c: number) => [number, number, number, number];
export const carsdemo_new: (a: bigint) => [number, number, number];
export const carsdemo_train_rows: (a: number) => number;
export const mine_text: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
