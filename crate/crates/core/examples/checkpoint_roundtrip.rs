//! Saves a field as a text checkpoint and reloads it bit-exactly.

use std::collections::BTreeMap;

use n2n_sdf::field::{read_checkpoint, write_checkpoint, Architecture, NeuralSdf};
use n2n_sdf::{Result, ScalarField, Vec3};

fn main() -> Result<()> {
    let field = NeuralSdf::new(&Architecture::default(), 3);
    let meta = BTreeMap::from([("note".to_string(), "untrained".to_string())]);
    let text = write_checkpoint(&field, &meta);
    let (back, meta_back) = read_checkpoint(&text)?;
    let q = Vec3::new(0.1, -0.2, 0.3);
    println!("{} parameters, {} bytes of text", field.param_count(), text.len());
    println!("f(q) before {:?}, after {:?}", field.eval(&q), back.eval(&q));
    println!("identical: {}, meta: {:?}", back == field, meta_back);
    Ok(())
}
