/// `(t, value)` samples tagged with the quantity and parameters they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub quantity: String,
    pub params: Vec<(String, f64)>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(quantity: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len());
        Self {
            quantity: quantity.into(),
            params: Vec::new(),
            times,
            values,
        }
    }

    pub fn with_param(mut self, name: impl Into<String>, value: f64) -> Self {
        self.params.push((name.into(), value));
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean of the values at `t ≥ t_min`, or `None` if there are none.
    pub fn mean_after(&self, t_min: f64) -> Option<f64> {
        let tail: Vec<f64> = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= t_min)
            .map(|(_, v)| *v)
            .collect();
        (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
    }
}
