use std::collections::VecDeque;

/// Trailing-average demand forecast over the last `window` periods, kept
/// independently per product. Periods not yet observed count as zero demand.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastState {
    window: usize,
    history: Vec<VecDeque<f64>>,
    sums: Vec<f64>,
}

impl ForecastState {
    pub fn new(products: usize, window: usize) -> Self {
        assert!(window > 0, "forecast window must be positive");
        Self {
            window,
            history: vec![VecDeque::with_capacity(window); products],
            sums: vec![0.0; products],
        }
    }

    /// Builds a forecaster already primed with `rows` (oldest first).
    pub fn primed<'a>(
        products: usize,
        window: usize,
        rows: impl IntoIterator<Item = &'a [f64]>,
    ) -> Self {
        let mut fs = Self::new(products, window);
        for row in rows {
            fs.update(row);
        }
        fs
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn update(&mut self, demand: &[f64]) {
        debug_assert_eq!(demand.len(), self.history.len());
        for ((buf, sum), &w) in self.history.iter_mut().zip(&mut self.sums).zip(demand) {
            if buf.len() == self.window {
                buf.pop_front();
            }
            buf.push_back(w);
            // Re-summing keeps the average free of accumulated drift.
            *sum = buf.iter().sum();
        }
    }

    pub fn buffer(&self, product: usize) -> impl Iterator<Item = f64> + '_ {
        self.history[product].iter().copied()
    }

    pub fn forecast(&self, product: usize) -> f64 {
        self.sums[product] / self.window as f64
    }

    pub fn forecasts(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.forecast(i)).collect()
    }
}
