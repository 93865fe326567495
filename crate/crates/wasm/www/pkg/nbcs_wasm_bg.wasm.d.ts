/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_approximation_free: (a: number, b: number) => void;
export const __wbg_classifier_free: (a: number, b: number) => void;
export const __wbg_embedding_free: (a: number, b: number) => void;
export const approximation_excess_ratio: (a: number, b: number) => number;
export const approximation_metrics_csv: (a: number) => [number, number];
export const approximation_new: (a: number, b: number, c: number) => [number, number, number];
export const approximation_stages: (a: number) => number;
export const approximation_svg: (a: number, b: number) => [number, number, number, number];
export const classifier_leaves: (a: number) => number;
export const classifier_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const classifier_predict: (a: number, b: number, c: number) => number;
export const classifier_svg: (a: number, b: number) => [number, number, number, number];
export const classifier_train_accuracy: (a: number) => number;
export const embedding_coefficients: (a: number) => [number, number];
export const embedding_indices: (a: number) => [number, number];
export const embedding_new: (a: number, b: number, c: number) => [number, number, number];
export const embedding_svg: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
