package com.example.ledger;

import java.math.BigDecimal;
import java.util.ArrayList;
import java.util.Collections;
import java.util.List;

/**
 * A single account holding a running balance and its postings.
 */
public class Account {
    private final String id;
    private final String owner;
    private BigDecimal balance = BigDecimal.ZERO;
    private final List<Posting> postings = new ArrayList<>();

    public Account(String id, String owner) {
        if (id == null || id.isEmpty()) {
            throw new IllegalArgumentException("account id required");
        }
        this.id = id;
        this.owner = owner;
    }

    public String getId() {
        return id;
    }

    public String getOwner() {
        return owner;
    }

    public BigDecimal getBalance() {
        return balance;
    }

    /**
     * Applies a posting and returns the new balance.
     */
    public BigDecimal apply(Posting posting) {
        if (!posting.getAccountId().equals(id)) {
            throw new IllegalStateException("posting for another account");
        }
        balance = balance.add(posting.signedAmount());
        postings.add(posting);
        return balance;
    }

    public List<Posting> history() {
        return Collections.unmodifiableList(postings);
    }

    // Sum of all debit postings, as a positive amount.
    public BigDecimal totalDebits() {
        BigDecimal total = BigDecimal.ZERO;
        for (Posting p : postings) {
            if (p.isDebit()) {
                total = total.add(p.getAmount());
            }
        }
        return total;
    }

    @Override
    public String toString() {
        return "Account(" + id + ", " + owner + ", " + balance + ")";
    }

    public static final class Posting {
        private final String accountId;
        private final BigDecimal amount;
        private final boolean debit;
        private final String memo;

        public Posting(String accountId, BigDecimal amount, boolean debit, String memo) {
            this.accountId = accountId;
            this.amount = amount;
            this.debit = debit;
            this.memo = memo;
        }

        public String getAccountId() {
            return accountId;
        }

        public BigDecimal getAmount() {
            return amount;
        }

        public boolean isDebit() {
            return debit;
        }

        public String getMemo() {
            return memo;
        }

        BigDecimal signedAmount() {
            return debit ? amount.negate() : amount;
        }
    }
}
