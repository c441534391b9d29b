/**
 * The extension network: 257 -> 256 -> 256 -> 256 -> 512, ReLU on the hidden
 * layers, exp on the linear output. Plain typed-array math with manual
 * backprop and an Adam optimizer.
 */

export const LAYER_DIMS = [257, 256, 256, 256, 512] as const;

export interface Layer {
  /** rows x cols, row-major, rows = output dim. */
  w: Float64Array;
  b: Float64Array;
  rows: number;
  cols: number;
}

export interface Network {
  layers: Layer[];
  theta: number;
}

export type Rng = () => number;

/** Deterministic 32-bit generator (mulberry32). */
export function makeRng(seed: number): Rng {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function gaussian(rng: Rng): number {
  let u = 0;
  while (u === 0) u = rng();
  const v = rng();
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
}

export function initNetwork(seed: number, theta = 0.1): Network {
  const rng = makeRng(seed);
  const layers: Layer[] = [];
  for (let i = 0; i < LAYER_DIMS.length - 1; i++) {
    const rows = LAYER_DIMS[i + 1];
    const cols = LAYER_DIMS[i];
    const scale = Math.sqrt(2 / cols);
    const w = new Float64Array(rows * cols);
    for (let j = 0; j < w.length; j++) {
      w[j] = scale * gaussian(rng);
    }
    layers.push({ w, b: new Float64Array(rows), rows, cols });
  }
  return { layers, theta };
}

export interface ForwardTrace {
  /** Pre-activation of each layer, then the exp output last. */
  pre: Float64Array[];
  post: Float64Array[];
  output: Float64Array;
}

export function forward(net: Network, input: Float64Array,
                        trace?: ForwardTrace): Float64Array {
  let h = input;
  const pre: Float64Array[] = [];
  const post: Float64Array[] = [];
  const last = net.layers.length - 1;
  for (let li = 0; li < net.layers.length; li++) {
    const { w, b, rows, cols } = net.layers[li];
    const z = new Float64Array(rows);
    for (let r = 0; r < rows; r++) {
      let acc = b[r];
      const base = r * cols;
      for (let c = 0; c < cols; c++) {
        acc += w[base + c] * h[c];
      }
      z[r] = acc;
    }
    pre.push(z);
    const a = new Float64Array(rows);
    if (li === last) {
      for (let r = 0; r < rows; r++) a[r] = Math.exp(z[r]);
    } else {
      for (let r = 0; r < rows; r++) a[r] = z[r] > 0 ? z[r] : 0;
    }
    post.push(a);
    h = a;
  }
  if (trace) {
    trace.pre = pre;
    trace.post = post;
    trace.output = h;
  }
  return h;
}

export interface Gradients {
  w: Float64Array[];
  b: Float64Array[];
}

export function zeroGradients(net: Network): Gradients {
  return {
    w: net.layers.map((l) => new Float64Array(l.w.length)),
    b: net.layers.map((l) => new Float64Array(l.b.length)),
  };
}

/**
 * Accumulates parameter gradients for one frame given dL/d(output).
 * The forward trace must come from the same input.
 */
export function backward(net: Network, input: Float64Array,
                         trace: ForwardTrace, dOut: Float64Array,
                         grads: Gradients): void {
  const last = net.layers.length - 1;
  // output layer: out = exp(z) -> dz = dOut * out
  let delta = new Float64Array(net.layers[last].rows);
  for (let r = 0; r < delta.length; r++) {
    delta[r] = dOut[r] * trace.output[r];
  }
  for (let li = last; li >= 0; li--) {
    const { w, rows, cols } = net.layers[li];
    const below = li === 0 ? input : trace.post[li - 1];
    const gw = grads.w[li];
    const gb = grads.b[li];
    for (let r = 0; r < rows; r++) {
      const d = delta[r];
      if (d === 0) continue;
      gb[r] += d;
      const base = r * cols;
      for (let c = 0; c < cols; c++) {
        gw[base + c] += d * below[c];
      }
    }
    if (li > 0) {
      const next = new Float64Array(cols);
      for (let r = 0; r < rows; r++) {
        const d = delta[r];
        if (d === 0) continue;
        const base = r * cols;
        for (let c = 0; c < cols; c++) {
          next[c] += d * w[base + c];
        }
      }
      // ReLU gate of the layer below
      const z = trace.pre[li - 1];
      for (let c = 0; c < cols; c++) {
        if (z[c] <= 0) next[c] = 0;
      }
      delta = next;
    }
  }
}

export class Adam {
  private m: Gradients;
  private v: Gradients;
  private t = 0;

  constructor(net: Network, public lr: number,
              private beta1 = 0.9, private beta2 = 0.999,
              private eps = 1e-8) {
    this.m = zeroGradients(net);
    this.v = zeroGradients(net);
  }

  step(net: Network, grads: Gradients): void {
    this.t += 1;
    const c1 = 1 - Math.pow(this.beta1, this.t);
    const c2 = 1 - Math.pow(this.beta2, this.t);
    for (let li = 0; li < net.layers.length; li++) {
      this.update(net.layers[li].w, grads.w[li], this.m.w[li], this.v.w[li], c1, c2);
      this.update(net.layers[li].b, grads.b[li], this.m.b[li], this.v.b[li], c1, c2);
    }
  }

  private update(p: Float64Array, g: Float64Array, m: Float64Array,
                 v: Float64Array, c1: number, c2: number): void {
    for (let i = 0; i < p.length; i++) {
      m[i] = this.beta1 * m[i] + (1 - this.beta1) * g[i];
      v[i] = this.beta2 * v[i] + (1 - this.beta2) * g[i] * g[i];
      p[i] -= (this.lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + this.eps);
    }
  }
}
