//! In-place amplitude kernels. Qubit `q` is bit `q` of the basis index
//! (little-endian). Density matrices reuse these kernels by treating the
//! row index as the high half of a doubled register.

use num_complex::Complex64 as C64;

use super::gate::Mat2;

#[inline]
pub fn apply_single(amps: &mut [C64], bit: usize, m: &Mat2) {
    let stride = 1usize << bit;
    let n = amps.len();
    let mut base = 0;
    while base < n {
        for i in base..base + stride {
            let j = i | stride;
            let a = amps[i];
            let b = amps[j];
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[j] = m[1][0] * a + m[1][1] * b;
        }
        base += stride << 1;
    }
}

#[inline]
pub fn apply_controlled(amps: &mut [C64], control: usize, target: usize, m: &Mat2) {
    let cmask = 1usize << control;
    let tmask = 1usize << target;
    for i in 0..amps.len() {
        if i & cmask != 0 && i & tmask == 0 {
            let j = i | tmask;
            let a = amps[i];
            let b = amps[j];
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[j] = m[1][0] * a + m[1][1] * b;
        }
    }
}

#[inline]
pub fn apply_swap(amps: &mut [C64], a: usize, b: usize) {
    let am = 1usize << a;
    let bm = 1usize << b;
    for i in 0..amps.len() {
        if i & am != 0 && i & bm == 0 {
            amps.swap(i, (i & !am) | bm);
        }
    }
}
