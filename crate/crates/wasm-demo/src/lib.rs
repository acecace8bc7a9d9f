//! Browser demo for the binoscope detector: score text against the
//! built-in observer/performer pair, calibrate thresholds on a synthetic
//! corpus and watch the ROC curve, and explore the score-versus-length
//! distribution. See www/index.html for the page that drives these
//! bindings.

pub mod api;

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn to_js(result: Result<String, String>) -> Result<String, JsValue> {
        result.map_err(|e| JsValue::from_str(&e))
    }

    /// Scores pasted text; returns a JSON object with token count,
    /// log-PPL, X-PPL, the Binoculars score, baselines, and the verdict
    /// at the given threshold.
    #[wasm_bindgen]
    pub fn score_text(text: &str, threshold: f64) -> Result<String, JsValue> {
        to_js(crate::api::score_text_json(text, threshold))
    }

    /// Generates a labeled demo corpus, scores it, and returns ROC
    /// points, AUROC, the three threshold choices, and the score/length
    /// scatter as JSON.
    #[wasm_bindgen]
    pub fn calibrate_demo(
        n_per_class: u32,
        doc_tokens: u32,
        seed: u32,
        epsilon: f64,
    ) -> Result<String, JsValue> {
        to_js(crate::api::calibrate_demo_json(
            n_per_class as usize,
            doc_tokens as usize,
            seed as u64,
            epsilon,
        ))
    }

    /// Deterministic sample text ("ai" or "human") to feed the scorer.
    #[wasm_bindgen]
    pub fn generate_sample(kind: &str, seed: u32, tokens: u32) -> Result<String, JsValue> {
        to_js(crate::api::generate_sample_json(kind, seed as u64, tokens as usize))
    }
}
