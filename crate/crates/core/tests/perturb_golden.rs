//! Pinned perturbation outputs. A change here changes every adversarial prompt
//! set generated from a given seed.

use paft_core::eval::{perturb_template, PerturbOp, PerturbSpec};
use paft_core::forge::{PromptTemplate, Split, Strategy};

const BODY: &str = "Read the passage carefully: {ctx}\nOption A: {A}\nOption B: {B}\nAnswer with one letter.";

fn source() -> PromptTemplate {
    PromptTemplate::new(BODY, Strategy::Human, "golden").unwrap()
}

#[test]
fn single_op_outputs_are_pinned() {
    let golden = [
        (PerturbOp::TypoSwap, "Read the passage carefluly: {ctx}\npOtion A: {A}\nOption B: {B}\nAnwser with one letter."),
        (PerturbOp::CharDrop, "Read the passage crfully: {ctx}\nOptin A: {A}\nOption B: {B}\nAnswer with oe letr"),
        (PerturbOp::PunctuationJitter, "Read the? passage carefully: {ctx}\nOption A: {A}\nOption B: {B}\nAnswer with one letter."),
        (PerturbOp::WordShuffleWindow, "Read passage the carefully: {ctx}\nOption A: {A}\nOption B: {B}\nAnswer with one letter."),
        (PerturbOp::CaseFlip, "Read the passage cArEfully: {ctx}\nOptioN A: {A}\nOption B: {B}\nAnswer with one lEtteR."),
    ];
    let t = source();
    for (op, want) in golden {
        let p = perturb_template(&t, &PerturbSpec::new(vec![op], 0.15, 7)).unwrap();
        assert_eq!(p.body, want, "{op:?}");
        assert_eq!(p.id, format!("{}-adv7", t.id));
        assert_eq!(p.origin, format!("perturb:{}", t.id));
        assert_eq!(p.split, Split::Adversarial);
    }
}

#[test]
fn stacked_ops_output_is_pinned() {
    let p = perturb_template(&source(), &PerturbSpec::new(PerturbOp::ALL.to_vec(), 0.3, 11)).unwrap();
    assert_eq!(p.body, "er. t AflUl; PSAasgE {ctx}\notIno : {A}\nOpion b: {B}\nWR Wi Etet on");
}

#[test]
fn template_id_is_content_derived() {
    assert_eq!(source().id, "p68253229a716");
}
