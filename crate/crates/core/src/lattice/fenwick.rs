/// Two-dimensional binary indexed tree: point updates and rectangle sums in
/// `O(log rows * log cols)`.
#[derive(Clone, Debug)]
pub struct Fenwick2d {
    rows: usize,
    cols: usize,
    tree: Vec<i64>,
}

impl Fenwick2d {
    pub fn new(rows: usize, cols: usize) -> Self {
        Fenwick2d {
            rows,
            cols,
            tree: vec![0; (rows + 1) * (cols + 1)],
        }
    }

    /// Builds the tree from a dense row-major field in `O(rows * cols)`.
    pub fn from_values(rows: usize, cols: usize, values: impl Fn(usize, usize) -> i64) -> Self {
        let stride = cols + 1;
        let mut tree = vec![0i64; (rows + 1) * stride];
        for r in 1..=rows {
            for c in 1..=cols {
                tree[r * stride + c] += values(r - 1, c - 1);
                let pc = c + (c & c.wrapping_neg());
                if pc <= cols {
                    let v = tree[r * stride + c];
                    tree[r * stride + pc] += v;
                }
            }
        }
        for r in 1..=rows {
            let pr = r + (r & r.wrapping_neg());
            if pr <= rows {
                for c in 1..=cols {
                    let v = tree[r * stride + c];
                    tree[pr * stride + c] += v;
                }
            }
        }
        Fenwick2d { rows, cols, tree }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn add(&mut self, row: usize, col: usize, delta: i64) {
        debug_assert!(row < self.rows && col < self.cols);
        let stride = self.cols + 1;
        let mut r = row + 1;
        while r <= self.rows {
            let mut c = col + 1;
            while c <= self.cols {
                self.tree[r * stride + c] += delta;
                c += c & c.wrapping_neg();
            }
            r += r & r.wrapping_neg();
        }
    }

    /// Sum over `[0, row) x [0, col)`.
    pub fn prefix(&self, row: usize, col: usize) -> i64 {
        let stride = self.cols + 1;
        let mut acc = 0;
        let mut r = row.min(self.rows);
        while r > 0 {
            let mut c = col.min(self.cols);
            while c > 0 {
                acc += self.tree[r * stride + c];
                c &= c - 1;
            }
            r &= r - 1;
        }
        acc
    }

    /// Sum over the half-open rectangle `[r0, r1) x [c0, c1)`.
    pub fn rect(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> i64 {
        if r0 >= r1 || c0 >= c1 {
            return 0;
        }
        self.prefix(r1, c1) - self.prefix(r0, c1) - self.prefix(r1, c0) + self.prefix(r0, c0)
    }
}
