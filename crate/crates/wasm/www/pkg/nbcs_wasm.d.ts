/* tslint:disable */
/* eslint-disable */

/**
 * Outer approximation of a convex polygon given as flat `x0,y0,x1,y1,...`.
 */
export class Approximation {
    free(): void;
    [Symbol.dispose](): void;
    excess_ratio(stage: number): number;
    metrics_csv(): string;
    constructor(polygon: Float64Array, stages: number);
    stages(): number;
    svg(stage: number): string;
}

/**
 * Planar classifier trained on clicked points.
 */
export class Classifier {
    free(): void;
    [Symbol.dispose](): void;
    leaves(): number;
    constructor(points: Float64Array, labels: Int32Array, strategy: string, q: number, c: number);
    predict(x: number, y: number): number;
    svg(grid: number): string;
    train_accuracy(): number;
}

/**
 * Sparse embedding of one point of the unit-edge triangle under uniform
 * barycentric subdivision.
 */
export class Embedding {
    free(): void;
    [Symbol.dispose](): void;
    coefficients(): Float64Array;
    indices(): Uint32Array;
    constructor(x: number, y: number, stages: number);
    svg(): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_approximation_free: (a: number, b: number) => void;
    readonly __wbg_classifier_free: (a: number, b: number) => void;
    readonly __wbg_embedding_free: (a: number, b: number) => void;
    readonly approximation_excess_ratio: (a: number, b: number) => number;
    readonly approximation_metrics_csv: (a: number) => [number, number];
    readonly approximation_new: (a: number, b: number, c: number) => [number, number, number];
    readonly approximation_stages: (a: number) => number;
    readonly approximation_svg: (a: number, b: number) => [number, number, number, number];
    readonly classifier_leaves: (a: number) => number;
    readonly classifier_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly classifier_predict: (a: number, b: number, c: number) => number;
    readonly classifier_svg: (a: number, b: number) => [number, number, number, number];
    readonly classifier_train_accuracy: (a: number) => number;
    readonly embedding_coefficients: (a: number) => [number, number];
    readonly embedding_indices: (a: number) => [number, number];
    readonly embedding_new: (a: number, b: number, c: number) => [number, number, number];
    readonly embedding_svg: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
