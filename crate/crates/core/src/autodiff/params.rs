/// Location of one layer inside a flat parameter vector.
///
/// Weights are stored row-major (`n_out` rows of `n_in`) followed by the
/// `n_out` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlice {
    pub offset: usize,
    pub n_in: usize,
    pub n_out: usize,
}

impl LayerSlice {
    pub fn weights_len(&self) -> usize {
        self.n_in * self.n_out
    }

    pub fn len(&self) -> usize {
        self.n_in * self.n_out + self.n_out
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.weights_len()
    }

    pub fn bias_range(&self) -> std::ops::Range<usize> {
        self.offset + self.weights_len()..self.offset + self.len()
    }
}

/// Flat ordered list of trainable values with optional per-layer offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    layers: Vec<LayerSlice>,
}

impl ParamVector {
    /// Unstructured vector (a single anonymous block).
    pub fn from_values(values: Vec<f64>) -> Self {
        ParamVector { values, layers: Vec::new() }
    }

    /// Vector laid out according to `layers`; lengths must agree.
    pub fn with_layout(values: Vec<f64>, layers: Vec<LayerSlice>) -> Self {
        debug_assert_eq!(layers.iter().map(LayerSlice::len).sum::<usize>(), values.len());
        ParamVector { values, layers }
    }

    /// Same layout, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        ParamVector { values, layers: self.layers.clone() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layers(&self) -> &[LayerSlice] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn layer(&self, i: usize) -> &[f64] {
        &self.values[self.layers[i].range()]
    }
}
