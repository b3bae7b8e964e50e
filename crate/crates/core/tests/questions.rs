use stepwise::interp::{execute, ExecutionLimits};
use stepwise::questions::{ask, generate_questions, render_prompt, QuestionKind};
use stepwise::syntax::SourceProgram;

const RSTRIP: &str = include_str!("fixtures/rstrip.py");
const CALL: &str = "test_rstrip(\"  hello world  \")";

fn candidates() -> Vec<stepwise::questions::WhiteBoxQuestion> {
    let (p, tree) = SourceProgram::new(RSTRIP, "test_rstrip").unwrap();
    let r = execute(&tree, CALL, ExecutionLimits::default(), true);
    generate_questions(&r.trace, &p, &tree)
}

#[test]
fn rstrip_questions_are_generated() {
    let qs = candidates();
    let q2 = qs
        .iter()
        .find(|q| q.kind == QuestionKind::DF && q.line == 2 && q.occ == 1)
        .expect("DF question on line 2");
    assert_eq!(q2.var.as_deref(), Some("result"));
    assert_eq!(q2.gt_val.as_deref(), Some("'  hello world'"));
    assert_eq!(q2.gt_ty.as_deref(), Some("str"));
    assert_eq!(
        q2.text,
        "What is the value and type of the variable `result` after Line 2 (`result = s.rstrip()`) is executed for the 1st time?"
    );
    let q3 = qs
        .iter()
        .find(|q| q.kind == QuestionKind::CF && q.line == 6 && q.occ == 1)
        .expect("CF question on line 6");
    assert_eq!(q3.gt_stmt.as_deref(), Some("            result = result.rstrip(char)"));
    assert!(q3.text.starts_with("Tracing the execution, which line is executed immediately after Line 6 (`elif char.isdigit():`)"));
}

#[test]
fn driver_is_never_a_target() {
    let qs = candidates();
    assert!(qs.iter().all(|q| q.line != 11));
    assert!(qs.iter().all(|q| q.gt_stmt.as_deref().is_none_or(|s| !s.contains("assert"))));
}

#[test]
fn prompt_layout() {
    let (p, tree) = SourceProgram::new(RSTRIP, "test_rstrip").unwrap();
    let qs = ask(&p, &tree, CALL, ExecutionLimits::default(), 10, 3).unwrap();
    let prompt = render_prompt(&p, &qs);
    assert!(prompt.contains("1   def test_rstrip(s):\n2       result = s.rstrip()\n"));
    assert!(prompt.contains("11  assert test_rstrip(\"  hello world  \") == ????\n"));
    assert!(prompt.contains("Exactly one semicolon and one space"));
    assert!(prompt.contains("Question1: Fill the assertion statement.\n"));
    assert!(prompt.contains(&format!("Question{}: ", qs.questions.len() + 1)));
    assert!(prompt.ends_with("<answer>\nAnswer for question1\n...\nAnswer for question11\n</answer>\n"));
    assert!(!prompt.contains("'  hello world'\n"), "answer leaked into prompt");

    let one = ask(&p, &tree, CALL, ExecutionLimits::default(), 1, 3).unwrap();
    assert_eq!(one.questions.len(), 1);
    let empty = stepwise::questions::QuestionSet { questions: vec![], ..one };
    let bare = render_prompt(&p, &empty);
    assert!(bare.contains("Question1:") && !bare.contains("Question2:"));
}
