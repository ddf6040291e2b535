//! The cache-oblivious routines are generic over the store. Running them on
//! a plain vector with no cache shows they never need a cache size or block
//! size, and gives an independent check of their results.

use aemsim_core::oblivious::{co_fft, co_matmul, co_sort, Complex, MatrixView};
use aemsim_core::{TracedArray, TracedStore, WordStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Cell<T> {
    Rec(T),
    Word(u64),
}

struct Plain<T> {
    cells: Vec<Cell<T>>,
    touches: u64,
}

impl<T: Copy> Plain<T> {
    fn new() -> Self {
        Plain { cells: vec![], touches: 0 }
    }

    fn load(&mut self, v: &[T]) -> TracedArray {
        let arr = TracedArray::new(self.cells.len(), v.len());
        self.cells.extend(v.iter().map(|&x| Cell::Rec(x)));
        arr
    }

    fn read_out(&self, arr: TracedArray) -> Vec<T> {
        self.cells[arr.base()..arr.base() + arr.len()]
            .iter()
            .map(|c| match c {
                Cell::Rec(v) => *v,
                Cell::Word(_) => panic!("word cell"),
            })
            .collect()
    }
}

impl<T: Copy> TracedStore<T> for Plain<T> {
    fn alloc(&mut self, len: usize, fill: T) -> TracedArray {
        let arr = TracedArray::new(self.cells.len(), len);
        self.cells.extend((0..len).map(|_| Cell::Rec(fill)));
        arr
    }

    fn release(&mut self, arr: TracedArray) {
        if arr.base() + arr.len() == self.cells.len() {
            self.cells.truncate(arr.base());
        }
    }

    fn get(&mut self, arr: TracedArray, i: usize) -> T {
        assert!(i < arr.len());
        self.touches += 1;
        match self.cells[arr.base() + i] {
            Cell::Rec(v) => v,
            Cell::Word(_) => panic!("record read from a word cell"),
        }
    }

    fn set(&mut self, arr: TracedArray, i: usize, v: T) {
        assert!(i < arr.len());
        self.touches += 1;
        self.cells[arr.base() + i] = Cell::Rec(v);
    }
}

impl<T: Copy> WordStore for Plain<T> {
    fn alloc_words(&mut self, len: usize) -> TracedArray {
        let arr = TracedArray::new(self.cells.len(), len);
        self.cells.extend((0..len).map(|_| Cell::Word(0)));
        arr
    }

    fn release_words(&mut self, arr: TracedArray) {
        self.release(arr);
    }

    fn get_word(&mut self, arr: TracedArray, i: usize) -> u64 {
        assert!(i < arr.len());
        match self.cells[arr.base() + i] {
            Cell::Word(v) => v,
            Cell::Rec(_) => panic!("word read from a record cell"),
        }
    }

    fn set_word(&mut self, arr: TracedArray, i: usize, v: u64) {
        assert!(i < arr.len());
        self.cells[arr.base() + i] = Cell::Word(v);
    }
}

#[test]
fn sort_on_a_plain_store() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [0usize, 1, 63, 64, 65, 1000, 12_345] {
        let v: Vec<i32> = (0..n).map(|_| rng.gen_range(-500..500)).collect();
        let mut store = Plain::new();
        let a = store.load(&v);
        let (out, _) = co_sort(&mut store, a, 8, n as u64);
        let mut want = v.clone();
        want.sort();
        assert_eq!(store.read_out(out), want);
        assert_eq!(store.read_out(a), v);
        assert!(n < 2 || store.touches > 0);
    }
}

#[test]
fn fft_on_a_plain_store() {
    let n = 512;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x: Vec<Complex> = (0..n).map(|_| Complex::new(rng.gen(), rng.gen())).collect();
    let mut store = Plain::new();
    let a = store.load(&x);
    let out = co_fft(&mut store, a, 8).unwrap();
    let got = store.read_out(out);
    // Parseval: sum |X|^2 = n sum |x|^2
    let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    let eg: f64 = got.iter().map(|v| v.norm_sqr()).sum();
    assert!((eg - n as f64 * ex).abs() <= 1e-9 * eg);
    let dc: Complex = x.iter().sum();
    assert!((got[0] - dc).norm() < 1e-9);
}

#[test]
fn matmul_on_a_plain_store() {
    let (n, k, p) = (20, 13, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let av: Vec<i64> = (0..n * k).map(|_| rng.gen_range(-9..9)).collect();
    let bv: Vec<i64> = (0..k * p).map(|_| rng.gen_range(-9..9)).collect();
    let mut store = Plain::new();
    let a = MatrixView::new(store.load(&av), n, k);
    let b = MatrixView::new(store.load(&bv), k, p);
    let (c, _) = co_matmul(&mut store, &a, &b, 4, 9).unwrap();
    let got = store.read_out(c.backing);
    for i in 0..n {
        for j in 0..p {
            let want: i64 = (0..k).map(|t| av[i * k + t] * bv[t * p + j]).sum();
            assert_eq!(got[i * p + j], want);
        }
    }
}
