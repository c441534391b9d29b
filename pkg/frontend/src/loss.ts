/**
 * Upper-band training objective: per-frame amplitude MSE with overestimated
 * bins weighted by the overestimation factor inside the difference, frame
 * losses averaged over time, and a dB-style log taken of the mean.
 */

export const DEFAULT_EPS = 1e-12;
export const DEFAULT_OVEREST = 2.0;

export function frameLoss(est: Float64Array, ref: Float64Array,
                          factor = DEFAULT_OVEREST): number {
  if (est.length !== ref.length) {
    throw new Error("amplitude vectors do not match");
  }
  let acc = 0;
  for (let k = 0; k < est.length; k++) {
    const d = est[k] > ref[k] ? factor : 1;
    const diff = d * est[k] - d * ref[k];
    acc += diff * diff;
  }
  return acc / est.length;
}

/** d(frameLoss)/d(est). */
export function frameLossGrad(est: Float64Array, ref: Float64Array,
                              factor = DEFAULT_OVEREST): Float64Array {
  const grad = new Float64Array(est.length);
  for (let k = 0; k < est.length; k++) {
    const d = est[k] > ref[k] ? factor : 1;
    grad[k] = (2 * d * d * (est[k] - ref[k])) / est.length;
  }
  return grad;
}

export function logAggregate(frameLosses: number[],
                             eps = DEFAULT_EPS): number {
  if (frameLosses.length === 0) {
    throw new Error("empty frame sequence");
  }
  let mean = 0;
  for (const v of frameLosses) mean += v;
  mean /= frameLosses.length;
  return 10 * Math.log10(eps + mean);
}

/** Sequence loss over (est, ref) frame pairs. */
export function sequenceLoss(est: Float64Array[], ref: Float64Array[],
                             factor = DEFAULT_OVEREST,
                             eps = DEFAULT_EPS): number {
  const per = est.map((e, i) => frameLoss(e, ref[i], factor));
  return logAggregate(per, eps);
}

/**
 * d(sequenceLoss)/d(mean frame loss) — the chain factor applied to each
 * per-frame gradient (divided further by the frame count by the caller).
 */
export function logAggregateGradFactor(meanFrameLoss: number,
                                       eps = DEFAULT_EPS): number {
  return 10 / (Math.LN10 * (eps + meanFrameLoss));
}
