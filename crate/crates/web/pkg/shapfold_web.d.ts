/* tslint:disable */
/* eslint-disable */

/**
 * The cars data split, model and training attributions for one seed.
 */
export class CarsDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Feature values, prediction and the `top` largest attributions of a
     * training row.
     */
    explain(row: number, top: number): string;
    /**
     * Induces a theory with the given gate and exception depth and
     * reports it with its held-out metrics.
     */
    induce(accuracy_gate: number, max_exception_depth: number): string;
    constructor(seed: bigint);
    readonly train_rows: number;
}

/**
 * Mined itemsets, one `{items} utility` line each. `k` wins over
 * `min_util` when both are given.
 */
export function mine_text(db: string, k?: number | null, min_util?: bigint | null): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_carsdemo_free: (a: number, b: number) => void;
    readonly carsdemo_explain: (a: number, b: number, c: number) => [number, number, number, number];
    readonly carsdemo_induce: (a: number, b: number, c: number) => [number, number, number, number];
    readonly carsdemo_new: (a: bigint) => [number, number, number];
    readonly carsdemo_train_rows: (a: number) => number;
    readonly mine_text: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
