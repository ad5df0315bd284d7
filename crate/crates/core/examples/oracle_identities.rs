use contagion::oracle::{verify_delayed, verify_recursion_tree, verify_stationary_identities, Instance};
use contagion::RootedTree;

fn main() -> contagion::Result<()> {
    // root with a cherry and a leaf
    let t = RootedTree::from_parents(&[None, Some(0), Some(0), Some(1), Some(1)])?;
    for r in [
        verify_recursion_tree(&t, 0.3)?,
        verify_stationary_identities(&Instance::Tree(t.clone()), 0.3, 0.5)?,
        verify_delayed(&Instance::Tree(t), 0.3, 0.5)?,
    ] {
        println!("{}", serde_json::to_string_pretty(&r)?);
    }
    Ok(())
}
