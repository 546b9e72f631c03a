use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{Span, SyntaxError};

/// The typing rule under which a diagnostic arose.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    TVar,
    TInt,
    TBool,
    TBinOp,
    TRec,
    TMemRec,
    TMemHdr,
    TIndex,
    TCall,
    TSubTypeIn,
    TAssign,
    TCond,
    TExit,
    TReturn,
    TTblCall,
    TFnCallStmt,
    TVarDecl,
    TVarInit,
    TFuncDecl,
    TTblDecl,
    TTypedef,
    TMatchKind,
    Syntax,
}

impl Rule {
    pub const ALL: [Rule; 23] = [
        Rule::TVar,
        Rule::TInt,
        Rule::TBool,
        Rule::TBinOp,
        Rule::TRec,
        Rule::TMemRec,
        Rule::TMemHdr,
        Rule::TIndex,
        Rule::TCall,
        Rule::TSubTypeIn,
        Rule::TAssign,
        Rule::TCond,
        Rule::TExit,
        Rule::TReturn,
        Rule::TTblCall,
        Rule::TFnCallStmt,
        Rule::TVarDecl,
        Rule::TVarInit,
        Rule::TFuncDecl,
        Rule::TTblDecl,
        Rule::TTypedef,
        Rule::TMatchKind,
        Rule::Syntax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::TVar => "T-Var",
            Rule::TInt => "T-Int",
            Rule::TBool => "T-Bool",
            Rule::TBinOp => "T-BinOp",
            Rule::TRec => "T-Rec",
            Rule::TMemRec => "T-MemRec",
            Rule::TMemHdr => "T-MemHdr",
            Rule::TIndex => "T-Index",
            Rule::TCall => "T-Call",
            Rule::TSubTypeIn => "T-SubType-In",
            Rule::TAssign => "T-Assign",
            Rule::TCond => "T-Cond",
            Rule::TExit => "T-Exit",
            Rule::TReturn => "T-Return",
            Rule::TTblCall => "T-TblCall",
            Rule::TFnCallStmt => "T-FnCallStmt",
            Rule::TVarDecl => "T-VarDecl",
            Rule::TVarInit => "T-VarInit",
            Rule::TFuncDecl => "T-FuncDecl",
            Rule::TTblDecl => "T-TblDecl",
            Rule::TTypedef => "T-Typedef",
            Rule::TMatchKind => "T-MatchKind",
            Rule::Syntax => "Syntax",
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Rule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Rule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Rule::from_name(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown rule `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    FlowViolation,
    TypeMismatch,
    UnknownVariable,
    UnknownField,
    UnknownTypeName,
    CyclicTypedef,
    UnknownMatchKind,
    NotAFunction,
    NotAnAction,
    ArityMismatch,
    NotAssignable,
    ReturnOutsideFunction,
    ReturnTypeMismatch,
    InitializerTypeMismatch,
    DuplicateName,
    DiscardedValue,
    SyntaxError,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub rule: Rule,
    pub kind: DiagnosticKind,
    pub severity: Severity,
    pub message: String,
    /// For flow violations: the label that was found and the label it had
    /// to flow into.
    pub found_label: Option<String>,
    pub required_label: Option<String>,
}

impl Diagnostic {
    pub fn error(
        span: Span,
        rule: Rule,
        kind: DiagnosticKind,
        message: impl Into<String>,
    ) -> Diagnostic {
        Diagnostic {
            span,
            rule,
            kind,
            severity: Severity::Error,
            message: message.into(),
            found_label: None,
            required_label: None,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn from_syntax(e: &SyntaxError) -> Diagnostic {
        Diagnostic::error(
            e.span(),
            Rule::Syntax,
            DiagnosticKind::SyntaxError,
            e.to_string(),
        )
    }

    pub fn to_record(&self, file: &str) -> DiagnosticRecord {
        DiagnosticRecord {
            file: file.to_string(),
            line: self.span.line,
            col: self.span.col,
            rule: self.rule,
            message: self.message.clone(),
            found_label: self.found_label.clone(),
            required_label: self.required_label.clone(),
            kind: self.kind,
            severity: self.severity,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}[{}]: {}", self.span, self.rule, self.message)
    }
}

/// One JSON-lines record per finding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub rule: Rule,
    pub message: String,
    pub found_label: Option<String>,
    pub required_label: Option<String>,
    pub kind: DiagnosticKind,
    pub severity: Severity,
}

impl DiagnosticRecord {
    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic {
            span: Span::new(self.line, self.col),
            rule: self.rule,
            kind: self.kind,
            severity: self.severity,
            message: self.message.clone(),
            found_label: self.found_label.clone(),
            required_label: self.required_label.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl Verdict {
    pub fn from_diagnostics(diagnostics: Vec<Diagnostic>) -> Verdict {
        Verdict {
            accepted: !diagnostics.iter().any(Diagnostic::is_error),
            diagnostics,
        }
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }
}
