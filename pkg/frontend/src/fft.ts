/**
 * Mixed-radix complex FFT for sizes of the form 2^a * 3^b, which covers the
 * 1536-point analysis DFT. Recursive decimation in time; good enough for
 * offline feature extraction.
 */

export interface ComplexArray {
  re: Float64Array;
  im: Float64Array;
}

function smallestRadix(n: number): number {
  if (n % 2 === 0) return 2;
  if (n % 3 === 0) return 3;
  throw new Error(`FFT size ${n} is not of the form 2^a * 3^b`);
}

function fftRec(re: Float64Array, im: Float64Array): ComplexArray {
  const n = re.length;
  if (n === 1) {
    return { re, im };
  }
  const r = smallestRadix(n);
  const m = n / r;

  const subs: ComplexArray[] = [];
  for (let j = 0; j < r; j++) {
    const sr = new Float64Array(m);
    const si = new Float64Array(m);
    for (let k = 0; k < m; k++) {
      sr[k] = re[k * r + j];
      si[k] = im[k * r + j];
    }
    subs.push(fftRec(sr, si));
  }

  const outRe = new Float64Array(n);
  const outIm = new Float64Array(n);
  const step = (-2 * Math.PI) / n;
  for (let k = 0; k < n; k++) {
    const km = k % m;
    let accRe = 0;
    let accIm = 0;
    for (let j = 0; j < r; j++) {
      const ang = step * j * k;
      const twRe = Math.cos(ang);
      const twIm = Math.sin(ang);
      const sr = subs[j].re[km];
      const si = subs[j].im[km];
      accRe += twRe * sr - twIm * si;
      accIm += twRe * si + twIm * sr;
    }
    outRe[k] = accRe;
    outIm[k] = accIm;
  }
  return { re: outRe, im: outIm };
}

/** Forward complex FFT; the input arrays are not modified. */
export function fft(re: Float64Array, im: Float64Array): ComplexArray {
  if (re.length !== im.length) {
    throw new Error("re/im length mismatch");
  }
  return fftRec(re, im);
}

/**
 * One-sided DFT of a real signal, zero-padded to dftSize.
 * Returns dftSize/2 + 1 bins.
 */
export function rfft(signal: Float64Array, dftSize: number): ComplexArray {
  if (signal.length > dftSize) {
    throw new Error("signal longer than DFT size");
  }
  const re = new Float64Array(dftSize);
  const im = new Float64Array(dftSize);
  re.set(signal);
  const full = fft(re, im);
  const bins = dftSize / 2 + 1;
  return {
    re: full.re.slice(0, bins),
    im: full.im.slice(0, bins),
  };
}
