//! Data-parallel helpers with a sequential fallback.
//!
//! Everything that iterates over image rows or independent sweep cells goes
//! through these functions so that the `parallel` feature is the only switch.
//! Work items never share mutable state, so results do not depend on the
//! scheduling order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Calls `f(row_index, row)` for every `width`-sized row of `data`.
pub fn for_each_row<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| f(y, row));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| f(y, row));
}

/// Builds a `width * height` buffer row by row.
pub fn build_rows<T, F>(width: usize, height: usize, f: F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    let mut data = vec![T::default(); width * height];
    for_each_row(&mut data, width, f);
    data
}

/// Maps `f` over `items`, preserving order.
pub fn map<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    return items.into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return items.into_iter().map(f).collect();
}

/// Returns true when the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_visited_once_in_place() {
        let out: Vec<usize> = build_rows(3, 4, |y, row| {
            for (x, v) in row.iter_mut().enumerate() {
                *v = y * 10 + x;
            }
        });
        assert_eq!(out[0..3], [0, 1, 2]);
        assert_eq!(out[9..12], [30, 31, 32]);
    }

    #[test]
    fn map_preserves_order() {
        let out = map((0..100).collect(), |i: i32| i * i);
        assert_eq!(out[7], 49);
        assert_eq!(out.len(), 100);
    }
}
